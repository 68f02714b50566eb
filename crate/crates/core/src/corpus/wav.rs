use std::io::Read;
use std::path::Path;

use crate::corpus::{AudioClip, Resampler};
use crate::error::{Error, Result};

fn map_hound(err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::NotFound => Error::Io(e),
        hound::Error::IoError(e) => Error::Format(format!("truncated or unreadable data: {e}")),
        hound::Error::FormatError(m) => Error::Format(m.to_string()),
        hound::Error::Unsupported => Error::UnsupportedCodec("unsupported WAVE feature".into()),
        hound::Error::TooWide => Error::UnsupportedCodec("sample width too large".into()),
        hound::Error::InvalidSampleFormat => Error::UnsupportedCodec("invalid sample format".into()),
        other => Error::Format(other.to_string()),
    }
}

/// Decodes a RIFF/WAVE stream to mono at its native rate.
///
/// Accepts PCM-16 and IEEE float-32 with one or two channels. Stereo is
/// averaged into mono.
pub fn read_wav<R: Read>(reader: R) -> Result<AudioClip> {
    let mut wav = hound::WavReader::new(reader).map_err(map_hound)?;
    let spec = wav.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(Error::UnsupportedCodec(format!("{} channels", spec.channels)));
    }
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => wav
            .samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (hound::SampleFormat::Float, 32) => wav
            .samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => {
            return Err(Error::UnsupportedCodec(format!("{fmt:?} with {bits} bits per sample")));
        }
    };
    if interleaved.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let mono = if spec.channels == 2 {
        interleaved.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect()
    } else {
        interleaved
    };
    if let Some(bad) = mono.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format(format!("non-finite sample at frame {bad}")));
    }
    let mono = mono.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    AudioClip::new(mono, spec.sample_rate)
}

/// Reads a WAV file, downmixes to mono and resamples to `target_rate`.
pub fn load_wav(path: impl AsRef<Path>, target_rate: u32) -> Result<AudioClip> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let clip = read_wav(std::io::BufReader::new(file))?;
    if clip.sample_rate() == target_rate {
        return Ok(clip);
    }
    let resampler = Resampler::new(clip.sample_rate(), target_rate)?;
    AudioClip::new(resampler.process(clip.samples()), target_rate)
}

/// Writes mono PCM-16 little-endian. Samples are clamped to [-1, 1].
pub fn write_wav_pcm16(path: impl AsRef<Path>, samples: &[f32], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(map_hound)?;
    for &s in samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(q).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn encode(spec: hound::WavSpec, write: impl FnOnce(&mut hound::WavWriter<&mut Cursor<Vec<u8>>>)) -> Vec<u8> {
        let mut cursor = Cursor::new(Vec::new());
        {
            let mut w = hound::WavWriter::new(&mut cursor, spec).unwrap();
            write(&mut w);
            w.finalize().unwrap();
        }
        cursor.into_inner()
    }

    #[test]
    fn stereo_is_averaged() {
        let spec = hound::WavSpec { channels: 2, sample_rate: 8000, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
        let bytes = encode(spec, |w| {
            for _ in 0..10 {
                w.write_sample(16384i16).unwrap();
                w.write_sample(0i16).unwrap();
            }
        });
        let clip = read_wav(Cursor::new(bytes)).unwrap();
        assert_eq!(clip.len(), 10);
        assert!(clip.samples().iter().all(|&s| (s - 0.25).abs() < 1e-6));
    }

    #[test]
    fn float32_is_accepted() {
        let spec = hound::WavSpec { channels: 1, sample_rate: 16000, bits_per_sample: 32, sample_format: hound::SampleFormat::Float };
        let bytes = encode(spec, |w| {
            for i in 0..100 {
                w.write_sample(i as f32 / 200.0).unwrap();
            }
        });
        let clip = read_wav(Cursor::new(bytes)).unwrap();
        assert_eq!(clip.sample_rate(), 16000);
        assert_eq!(clip.samples()[50], 0.25);
    }

    #[test]
    fn unsupported_and_malformed_inputs() {
        let spec = hound::WavSpec { channels: 1, sample_rate: 8000, bits_per_sample: 8, sample_format: hound::SampleFormat::Int };
        let bytes = encode(spec, |w| w.write_sample(3i8).unwrap());
        assert!(matches!(read_wav(Cursor::new(bytes)), Err(Error::UnsupportedCodec(_))));

        let spec = hound::WavSpec { channels: 3, sample_rate: 8000, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
        let bytes = encode(spec, |w| {
            for _ in 0..3 {
                w.write_sample(1i16).unwrap();
            }
        });
        assert!(matches!(read_wav(Cursor::new(bytes)), Err(Error::UnsupportedCodec(_))));

        assert!(matches!(read_wav(Cursor::new(b"RIFX0000WAVEjunk".to_vec())), Err(Error::Format(_))));

        let spec = hound::WavSpec { channels: 1, sample_rate: 8000, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
        let bytes = encode(spec, |_| {});
        assert!(matches!(read_wav(Cursor::new(bytes)), Err(Error::EmptyAudio)));
    }

    #[test]
    fn pcm16_round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tone.wav");
        let samples: Vec<f32> = (0..2205).map(|i| (i as f32 * 0.01).sin() * 0.5).collect();
        write_wav_pcm16(&path, &samples, 22050).unwrap();
        let clip = load_wav(&path, 22050).unwrap();
        assert_eq!(clip.len(), samples.len());
        for (a, b) in clip.samples().iter().zip(&samples) {
            assert!((a - b).abs() <= 1.0 / 32767.0);
        }
    }
}
