//! WAV decoding, annotation parsing and segment slicing.
//!
//! Recordings are mono RIFF/WAVE files holding 16-bit PCM or IEEE float
//! samples. Swallow annotations live in a small CSV file:
//!
//! ```text
//! start_s,end_s,label,consistency,subject_id[,wav]
//! ```
//!
//! The optional `wav` column names the recording (relative to the CSV) that
//! a row refers to; without it every row refers to the same recording.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PCM16_SCALE: f64 = 32768.0;
const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xfffe;

pub const ANNOTATION_HEADER: [&str; 5] = ["start_s", "end_s", "label", "consistency", "subject_id"];

#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if let Some((i, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !(-1.0..=1.0).contains(*s))
        {
            return Err(Error::Domain(format!("sample {i} = {s} outside [-1, 1]")));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }
}

/// Positive class is [`Label::Dysphagic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    Dysphagic,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Normal, Label::Dysphagic];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Dysphagic => "dysphagic",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Label::Normal => 0,
            Label::Dysphagic => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Dysphagic
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "normal" => Ok(Label::Normal),
            "dysphagic" => Ok(Label::Dysphagic),
            _ => Err(()),
        }
    }
}

/// Bolus consistency swallowed during the recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consistency {
    Thin,
    MildlyThick,
    Porridge,
    Unknown,
}

impl Consistency {
    pub const ALL: [Consistency; 4] = [
        Consistency::Thin,
        Consistency::MildlyThick,
        Consistency::Porridge,
        Consistency::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Consistency::Thin => "thin",
            Consistency::MildlyThick => "mildly_thick",
            Consistency::Porridge => "porridge",
            Consistency::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Consistency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Consistency {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Consistency::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentAnnotation {
    pub start_s: f64,
    pub end_s: f64,
    pub label: Label,
    pub consistency: Consistency,
    pub subject_id: String,
    /// Recording this row refers to, when the annotation file names one.
    pub wav: Option<String>,
}

impl SegmentAnnotation {
    pub fn new(
        start_s: f64,
        end_s: f64,
        label: Label,
        consistency: Consistency,
        subject_id: impl Into<String>,
    ) -> Result<Self> {
        if !(start_s.is_finite() && end_s.is_finite()) || start_s < 0.0 || end_s <= start_s {
            return Err(Error::Domain(format!(
                "annotation interval [{start_s}, {end_s}] is not a positive-length interval"
            )));
        }
        Ok(Self {
            start_s,
            end_s,
            label,
            consistency,
            subject_id: subject_id.into(),
            wav: None,
        })
    }

    pub fn with_wav(mut self, wav: impl Into<String>) -> Self {
        self.wav = Some(wav.into());
        self
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioSegment {
    pub annotation: SegmentAnnotation,
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioSegment {
    /// Wraps a whole signal as a single segment.
    pub fn from_signal(signal: AudioSignal, annotation: SegmentAnnotation) -> Self {
        Self {
            annotation,
            sample_rate_hz: signal.sample_rate_hz,
            samples: signal.samples,
        }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            annotation: self.annotation.clone(),
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct FmtChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits_per_sample: u16,
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(Error::WavFormat(format!("fmt chunk is {} bytes, need 16", body.len())));
    }
    let mut format_tag = le_u16(body, 0);
    if format_tag == FORMAT_EXTENSIBLE {
        // WAVEFORMATEXTENSIBLE: the real format tag leads the sub-format GUID.
        if body.len() < 26 {
            return Err(Error::WavFormat("truncated extensible fmt chunk".into()));
        }
        format_tag = le_u16(body, 24);
    }
    Ok(FmtChunk {
        format_tag,
        channels: le_u16(body, 2),
        sample_rate: le_u32(body, 4),
        block_align: le_u16(body, 12),
        bits_per_sample: le_u16(body, 14),
    })
}

/// Decodes an in-memory RIFF/WAVE file. Chunks other than `fmt ` and `data`
/// are skipped.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioSignal> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::WavFormat("missing RIFF/WAVE header".into()));
    }

    let mut fmt = None;
    let mut data = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| {
                Error::WavFormat(format!(
                    "chunk `{}` declares {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word aligned.
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| Error::WavFormat("no `fmt ` chunk".into()))?;
    let data = data.ok_or_else(|| Error::WavFormat("no `data` chunk".into()))?;

    if fmt.channels != 1 {
        return Err(Error::UnsupportedLayout { channels: fmt.channels });
    }
    if fmt.sample_rate == 0 {
        return Err(Error::WavFormat("sample rate is zero".into()));
    }
    let width = match (fmt.format_tag, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        (FORMAT_IEEE_FLOAT, 64) => 8,
        (format_tag, bits_per_sample) => {
            return Err(Error::UnsupportedCodec { format_tag, bits_per_sample })
        }
    };
    if usize::from(fmt.block_align) != width {
        return Err(Error::WavFormat(format!(
            "block align {} does not match {width}-byte mono samples",
            fmt.block_align
        )));
    }

    let samples = data
        .chunks_exact(width)
        .map(|b| match width {
            2 => Ok(f64::from(i16::from_le_bytes([b[0], b[1]])) / PCM16_SCALE),
            4 => float_sample(f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))),
            _ => float_sample(f64::from_le_bytes(b.try_into().expect("8-byte chunk"))),
        })
        .collect::<Result<Vec<_>>>()?;

    AudioSignal::new(samples, fmt.sample_rate)
}

fn float_sample(s: f64) -> Result<f64> {
    if s.is_finite() {
        Ok(s.clamp(-1.0, 1.0))
    } else {
        Err(Error::WavFormat("non-finite float sample".into()))
    }
}

/// Encodes samples as a 16-bit PCM mono WAV.
pub fn encode_wav_pcm16(signal: &AudioSignal) -> Vec<u8> {
    let data_len = signal.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&signal.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(signal.sample_rate_hz * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &signal.samples {
        let q = (s * PCM16_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_wav_pcm16(signal)).map_err(|e| Error::io(path, e))
}

pub fn parse_annotations(path: impl AsRef<Path>) -> Result<Vec<SegmentAnnotation>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations_str(&text)
}

/// Parses annotation CSV text. Line numbers in errors are 1-based and count
/// every physical line, including the header and comments.
pub fn parse_annotations_str(text: &str) -> Result<Vec<SegmentAnnotation>> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'));

    let (header_line, header) = rows.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_wav = match columns.as_slice() {
        [fixed @ .., "wav"] if fixed == ANNOTATION_HEADER => true,
        fixed if fixed == ANNOTATION_HEADER => false,
        _ => {
            return Err(Error::Parse {
                line: header_line,
                message: format!("expected header `{}`", ANNOTATION_HEADER.join(",")),
            })
        }
    };

    rows.map(|(line, row)| {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", columns.len(), fields.len()),
            });
        }
        let start_s = parse_seconds(fields[0], line)?;
        let end_s = parse_seconds(fields[1], line)?;
        if end_s <= start_s {
            return Err(Error::AnnotationRange { line, start_s, end_s });
        }
        let label = fields[2].parse().map_err(|_| Error::Vocabulary {
            line,
            field: "label",
            token: fields[2].to_string(),
        })?;
        let consistency = fields[3].parse().map_err(|_| Error::Vocabulary {
            line,
            field: "consistency",
            token: fields[3].to_string(),
        })?;
        if fields[4].is_empty() {
            return Err(Error::Parse { line, message: "empty subject_id".into() });
        }
        Ok(SegmentAnnotation {
            start_s,
            end_s,
            label,
            consistency,
            subject_id: fields[4].to_string(),
            wav: has_wav.then(|| fields[5].to_string()),
        })
    })
    .collect()
}

fn parse_seconds(token: &str, line: usize) -> Result<f64> {
    let malformed = || Error::Parse {
        line,
        message: format!("`{token}` is not a time in seconds"),
    };
    // Only plain decimal notation; rules out `inf`, `nan` and locale variants.
    if token.is_empty() || !token.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b)) {
        return Err(malformed());
    }
    let value: f64 = token.parse().map_err(|_| malformed())?;
    if value < 0.0 {
        return Err(Error::Parse { line, message: format!("negative time {value}") });
    }
    Ok(value)
}

pub fn format_annotations(annotations: &[SegmentAnnotation]) -> String {
    let with_wav = annotations.iter().any(|a| a.wav.is_some());
    let mut out = ANNOTATION_HEADER.join(",");
    if with_wav {
        out.push_str(",wav");
    }
    out.push('\n');
    for a in annotations {
        out.push_str(&format!(
            "{},{},{},{},{}",
            a.start_s, a.end_s, a.label, a.consistency, a.subject_id
        ));
        if with_wav {
            out.push(',');
            out.push_str(a.wav.as_deref().unwrap_or(""));
        }
        out.push('\n');
    }
    out
}

pub fn write_annotations(path: impl AsRef<Path>, annotations: &[SegmentAnnotation]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_annotations(annotations)).map_err(|e| Error::io(path, e))
}

fn sample_index(t: f64, rate: u32) -> usize {
    (t * f64::from(rate)).round() as usize
}

/// Cuts each annotated interval out of `signal`. Overlapping annotations
/// yield segments that share samples.
pub fn slice_segments(
    signal: &AudioSignal,
    annotations: &[SegmentAnnotation],
) -> Result<Vec<AudioSegment>> {
    let rate = signal.sample_rate_hz;
    annotations
        .iter()
        .enumerate()
        .map(|(index, a)| {
            let start = sample_index(a.start_s, rate);
            let end = sample_index(a.end_s, rate);
            if end > signal.len() || start >= end {
                return Err(Error::SegmentOutOfRange {
                    index,
                    start_s: a.start_s,
                    end_s: a.end_s,
                    duration_s: signal.duration_s(),
                });
            }
            Ok(AudioSegment {
                annotation: a.clone(),
                samples: signal.samples[start..end].to_vec(),
                sample_rate_hz: rate,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcm16_wav(rate: u32, channels: u16, samples: &[i16]) -> Vec<u8> {
        let block = 2 * channels;
        let mut b = Vec::new();
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(36 + samples.len() as u32 * 2).to_le_bytes());
        b.extend_from_slice(b"WAVEfmt ");
        b.extend_from_slice(&16u32.to_le_bytes());
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&channels.to_le_bytes());
        b.extend_from_slice(&rate.to_le_bytes());
        b.extend_from_slice(&(rate * u32::from(block)).to_le_bytes());
        b.extend_from_slice(&block.to_le_bytes());
        b.extend_from_slice(&16u16.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&(samples.len() as u32 * 2).to_le_bytes());
        for s in samples {
            b.extend_from_slice(&s.to_le_bytes());
        }
        b
    }

    #[test]
    fn silence_decodes_to_zeros() {
        let sig = decode_wav(&pcm16_wav(4000, 1, &[0; 4000])).unwrap();
        assert_eq!(sig.len(), 4000);
        assert_eq!(sig.sample_rate_hz(), 4000);
        assert!(sig.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pcm16_normalization_is_asymmetric() {
        let sig = decode_wav(&pcm16_wav(8000, 1, &[-32768, 32767, 16384])).unwrap();
        assert_eq!(sig.samples(), &[-1.0, 32767.0 / 32768.0, 0.5]);
    }

    #[test]
    fn stereo_is_rejected() {
        let err = decode_wav(&pcm16_wav(4000, 2, &[0; 8])).unwrap_err();
        assert!(matches!(err, Error::UnsupportedLayout { channels: 2 }));
    }

    #[test]
    fn unknown_codec_is_rejected() {
        let mut bytes = pcm16_wav(4000, 1, &[0; 4]);
        bytes[20] = 0x55; // MP3 format tag
        assert!(matches!(
            decode_wav(&bytes).unwrap_err(),
            Error::UnsupportedCodec { format_tag: 0x55, .. }
        ));
    }

    #[test]
    fn malformed_headers_are_format_errors() {
        assert!(matches!(decode_wav(b"RIFX"), Err(Error::WavFormat(_))));
        let mut bytes = pcm16_wav(4000, 1, &[0; 4]);
        bytes.truncate(bytes.len() - 2);
        assert!(matches!(decode_wav(&bytes), Err(Error::WavFormat(_))));
    }

    #[test]
    fn extra_chunks_are_skipped() {
        let base = pcm16_wav(4000, 1, &[100, -100, 7]);
        // Insert an odd-sized LIST chunk (with pad byte) between fmt and data.
        let mut bytes = base[..36].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3, 0]);
        bytes.extend_from_slice(&base[36..]);
        let sig = decode_wav(&bytes).unwrap();
        assert_eq!(sig.len(), 3);
        assert_eq!(sig.samples()[2], 7.0 / 32768.0);
    }

    #[test]
    fn float_wav_decodes() {
        let mut b = pcm16_wav(4000, 1, &[]);
        // Patch to IEEE float, 32 bits, block align 4, then append data.
        b[20..22].copy_from_slice(&3u16.to_le_bytes());
        b[32..34].copy_from_slice(&4u16.to_le_bytes());
        b[34..36].copy_from_slice(&32u16.to_le_bytes());
        b.truncate(36);
        b.extend_from_slice(b"data");
        b.extend_from_slice(&8u32.to_le_bytes());
        b.extend_from_slice(&0.25f32.to_le_bytes());
        b.extend_from_slice(&(-0.5f32).to_le_bytes());
        let sig = decode_wav(&b).unwrap();
        assert_eq!(sig.samples(), &[0.25, -0.5]);
    }

    #[test]
    fn header_only_annotations_are_empty() {
        assert!(parse_annotations_str("start_s,end_s,label,consistency,subject_id\n")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn annotation_row_parses() {
        let rows = parse_annotations_str(
            "start_s,end_s,label,consistency,subject_id\n0.50,1.20,dysphagic,thin,P01\n",
        )
        .unwrap();
        assert_eq!(
            rows,
            vec![SegmentAnnotation::new(0.5, 1.2, Label::Dysphagic, Consistency::Thin, "P01").unwrap()]
        );
    }

    #[test]
    fn reversed_interval_names_its_line() {
        let err = parse_annotations_str(
            "start_s,end_s,label,consistency,subject_id\n1.20,0.50,normal,thin,P01\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::AnnotationRange { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_label_is_a_vocabulary_error() {
        let err = parse_annotations_str(
            "# comment\nstart_s,end_s,label,consistency,subject_id\n0,1,aspirating,thin,P01\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Vocabulary { line: 3, field: "label", .. }), "{err}");
    }

    #[test]
    fn comma_decimals_are_rejected() {
        let err = parse_annotations_str(
            "start_s,end_s,label,consistency,subject_id\n\"0,5\",1.0,normal,thin,P01\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_annotations_str(
            "start_s,end_s,label,consistency,subject_id\n0,5,1.0,normal,thin,P01\n"
        )
        .is_err());
    }

    #[test]
    fn wav_column_round_trips() {
        let rows = vec![
            SegmentAnnotation::new(0.0, 1.0, Label::Normal, Consistency::Porridge, "H01")
                .unwrap()
                .with_wav("wav/a.wav"),
            SegmentAnnotation::new(0.25, 0.75, Label::Dysphagic, Consistency::MildlyThick, "P02")
                .unwrap()
                .with_wav("wav/b.wav"),
        ];
        assert_eq!(parse_annotations_str(&format_annotations(&rows)).unwrap(), rows);
    }

    fn ten_second_signal() -> AudioSignal {
        let samples = (0..40_000).map(|i| (i as f64 / 40_000.0) - 0.5).collect();
        AudioSignal::new(samples, 4000).unwrap()
    }

    #[test]
    fn slicing_one_second_at_4khz() {
        let sig = ten_second_signal();
        let ann = SegmentAnnotation::new(2.0, 3.0, Label::Normal, Consistency::Thin, "P").unwrap();
        let segs = slice_segments(&sig, &[ann]).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].samples.len(), 4000);
        assert_eq!(segs[0].samples, sig.samples()[8000..12000]);
        assert!(slice_segments(&sig, &[]).unwrap().is_empty());
    }

    #[test]
    fn slicing_past_the_end_fails() {
        let sig = ten_second_signal();
        let ok = SegmentAnnotation::new(0.0, 1.0, Label::Normal, Consistency::Thin, "P").unwrap();
        let bad = SegmentAnnotation::new(9.5, 10.5, Label::Normal, Consistency::Thin, "P").unwrap();
        let err = slice_segments(&sig, &[ok, bad]).unwrap_err();
        assert!(matches!(err, Error::SegmentOutOfRange { index: 1, .. }));
    }

    #[test]
    fn out_of_range_samples_are_rejected() {
        assert!(AudioSignal::new(vec![0.0, 1.5], 4000).is_err());
        assert!(AudioSignal::new(vec![0.0], 0).is_err());
    }
}
